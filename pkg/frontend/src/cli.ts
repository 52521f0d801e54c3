/**
 * Command line: render --scenario <id> --in <csv> --out <svg>
 *
 * Exit codes: 0 success, 1 usage or I/O error, 2 schema mismatch (the
 * message names the offending column).
 */
import { pathToFileURL } from "node:url";

import { PlotSpec, render } from "./render.js";
import { SCENARIOS, SchemaError, isScenarioId } from "./schemas.js";

export interface Io {
  out(line: string): void;
  err(line: string): void;
}

const processIo: Io = {
  out: (line) => console.log(line),
  err: (line) => console.error(line),
};

const USAGE =
  "usage: render --scenario <id> --in <csv> --out <svg>\n" +
  `  scenarios: ${Object.keys(SCENARIOS).join(" | ")}`;

export async function main(argv: string[], io: Io = processIo): Promise<number> {
  const args = [...argv];
  if (args[0] === "render") {
    args.shift();
  }
  const flags = new Map<string, string>();
  while (args.length > 0) {
    const flag = args.shift()!;
    if (flag !== "--scenario" && flag !== "--in" && flag !== "--out") {
      io.err(`unknown argument "${flag}"\n${USAGE}`);
      return 1;
    }
    const value = args.shift();
    if (value === undefined) {
      io.err(`${flag} needs a value\n${USAGE}`);
      return 1;
    }
    flags.set(flag, value);
  }
  const scenario = flags.get("--scenario");
  const input = flags.get("--in");
  const output = flags.get("--out");
  if (scenario === undefined || input === undefined || output === undefined) {
    io.err(USAGE);
    return 1;
  }
  if (!isScenarioId(scenario)) {
    io.err(
      `unknown scenario "${scenario}" (expected ${Object.keys(SCENARIOS).join(" | ")})`,
    );
    return 1;
  }

  const spec: PlotSpec = { scenario, input, output };
  try {
    const path = await render(spec);
    io.out(`wrote ${path}`);
    return 0;
  } catch (error) {
    if (error instanceof SchemaError) {
      io.err(`schema mismatch in ${input}: ${error.message}`);
      return 2;
    }
    io.err(error instanceof Error ? error.message : String(error));
    return 1;
  }
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? "").href) {
  process.exit(await main(process.argv.slice(2)));
}
