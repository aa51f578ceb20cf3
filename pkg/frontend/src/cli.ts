#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadFigureSpec, render } from "./render.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("render", "render a figure from CSV results", (cmd) =>
      cmd.option("spec", {
        type: "string",
        demandOption: true,
        describe: "path to a figure-spec JSON file",
      }),
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .parse();
  const spec = loadFigureSpec(args.spec as string);
  render(spec);
  console.log(`wrote ${spec.output}`);
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("render")) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${(err as Error).message}`);
      process.exit(1);
    });
}
