/**
 * CLI: render --csv a.csv,b.csv --group mode,outer,inner --out fig.png
 *             --guides -0.25,-0.5,-1
 */
import { render } from "./render";

function parseArgs(argv: string[]) {
  if (argv[0] !== "render") {
    throw new Error("usage: render --csv <paths> [--group keys] --out <file> [--guides e1,e2]");
  }
  const opts: Record<string, string> = {};
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!flag.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed option ${flag}`);
    }
    opts[flag.slice(2)] = argv[i + 1];
  }
  if (!opts.csv || !opts.out) {
    throw new Error("--csv and --out are required");
  }
  return {
    csvPaths: opts.csv.split(",").filter(Boolean),
    groupKeys: (opts.group ?? "mode").split(",").filter(Boolean),
    outPath: opts.out,
    guides: (opts.guides ?? "").split(",").filter(Boolean).map(Number),
  };
}

export function main(argv: string[]): number {
  let spec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const report = render(spec);
    console.log(
      `wrote ${report.outPath} (${report.curveCount} curve(s))`,
    );
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
