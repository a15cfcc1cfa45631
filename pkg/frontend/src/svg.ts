/** Scene to SVG text; numbers fixed to 2 decimals so output is stable. */
import { Scene } from "./scene";

const f = (v: number) => v.toFixed(2);

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function sceneToSvg(scene: Scene): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
      `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}" ` +
      `data-x-scale="${scene.xScale}" data-y-scale="${scene.yScale}">`,
  );
  out.push(`<rect width="${scene.width}" height="${scene.height}" fill="#ffffff"/>`);
  for (const s of [...scene.frame, ...scene.ticks]) {
    out.push(
      `<line class="axis" x1="${f(s.x1)}" y1="${f(s.y1)}" x2="${f(s.x2)}" ` +
        `y2="${f(s.y2)}" stroke="${s.color}" stroke-width="1"/>`,
    );
  }
  for (const p of scene.polylines) {
    const pts = p.points.map((q) => `${f(q.x)},${f(q.y)}`).join(" ");
    const dash = p.kind === "guide" ? ' stroke-dasharray="6,4"' : "";
    out.push(
      `<polyline class="${p.kind}" data-label="${escapeXml(p.label)}" ` +
        `points="${pts}" fill="none" stroke="${p.color}" stroke-width="1.6"${dash}/>`,
    );
    if (p.kind === "curve") {
      for (const q of p.points) {
        out.push(
          `<circle class="marker" cx="${f(q.x)}" cy="${f(q.y)}" r="2.4" fill="${p.color}"/>`,
        );
      }
    }
  }
  for (const t of scene.texts) {
    out.push(
      `<text x="${f(t.x)}" y="${f(t.y)}" font-size="${t.size}" ` +
        `font-family="Helvetica, Arial, sans-serif" fill="${t.color}" ` +
        `text-anchor="${t.anchor}">${escapeXml(t.text)}</text>`,
    );
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}
