import { describe, expect, it } from "vitest";
import { CSV_HEADER, parseCsvText } from "../src/csv";

const GOOD_ROW = "stp,4,48,2.5,0.1,0.04,0,7,0";

describe("csv parsing", () => {
  it("parses well-formed rows", () => {
    const text = `${CSV_HEADER}\n${GOOD_ROW}\n`;
    const out = parseCsvText(text);
    expect(out.records).toHaveLength(1);
    expect(out.skipped).toBe(0);
    const r = out.records[0];
    expect(r.mode).toBe("stp");
    expect(r.n).toBe(48);
    expect(r.absError).toBeCloseTo(0.04);
    expect(r.seed).toBe(7);
  });

  it("treats empty error fields as missing", () => {
    const text = `${CSV_HEADER}\nftp,4,16,1.0,,,0,0,0\n`;
    const r = parseCsvText(text).records[0];
    expect(r.relError).toBeNull();
    expect(r.absError).toBeNull();
  });

  it("skips malformed rows and counts them", () => {
    const text = [
      CSV_HEADER,
      GOOD_ROW,
      "not,a,row",
      "ftp,x,16,1.0,,,0,0,0",
      "ftp,4,16,1.0,,,0,0",
      GOOD_ROW,
    ].join("\n");
    const out = parseCsvText(text);
    expect(out.records).toHaveLength(2);
    expect(out.skipped).toBe(3);
  });

  it("rejects a wrong header", () => {
    expect(() => parseCsvText("a,b,c\n1,2,3\n")).toThrow(/header/);
  });
});
