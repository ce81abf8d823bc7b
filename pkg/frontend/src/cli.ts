/**
 * `l1bsde-figures <spec.json>` renders one image per figure spec.
 *
 * The spec file holds a single object or an array of
 * `{input, kind, output, ...}` entries; paths are resolved relative to the
 * spec file. Exit codes: 0 rendered, 1 render/report error (missing file,
 * missing columns, unknown kind), 2 unreadable spec file. Inputs are read-only.
 */

import { readFile, writeFile } from "node:fs/promises";
import { dirname, resolve } from "node:path";
import { pathToFileURL } from "node:url";

import { parseReport, ReportError } from "./csv.js";
import { FigureSpec, renderFigure } from "./figures.js";

function asSpecList(raw: unknown): FigureSpec[] {
  const list = Array.isArray(raw) ? raw : [raw];
  return list.map((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      throw new Error(`spec entry ${i} is not an object`);
    }
    const spec = entry as Record<string, unknown>;
    for (const field of ["input", "kind", "output"]) {
      if (typeof spec[field] !== "string") {
        throw new Error(`spec entry ${i} needs a string "${field}"`);
      }
    }
    return spec as unknown as FigureSpec;
  });
}

export async function main(argv: string[]): Promise<number> {
  const specPath = argv[0];
  if (!specPath) {
    console.error("usage: l1bsde-figures <spec.json>");
    return 2;
  }
  let specs: FigureSpec[];
  try {
    specs = asSpecList(JSON.parse(await readFile(specPath, "utf-8")));
  } catch (err) {
    console.error(`spec error: ${(err as Error).message}`);
    return 2;
  }
  const base = dirname(resolve(specPath));
  for (const spec of specs) {
    try {
      const rows = parseReport(await readFile(resolve(base, spec.input), "utf-8"));
      const svg = renderFigure(rows, spec);
      const outPath = resolve(base, spec.output);
      await writeFile(outPath, svg, "utf-8");
      console.log(`${spec.kind} -> ${outPath}`);
    } catch (err) {
      const label = err instanceof ReportError ? "report error" : "render error";
      console.error(`${label} (${spec.kind} <- ${spec.input}): ${(err as Error).message}`);
      return 1;
    }
  }
  return 0;
}

const invokedDirectly =
  typeof process.argv[1] === "string" && import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
