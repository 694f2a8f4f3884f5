import { readFileSync, writeFileSync } from "fs";

import { plotConvergence } from "./convergence";
import { plotEnergy } from "./energy";

function usage(): never {
  process.stderr.write(
    "usage: node dist/cli.js convergence <convergence.csv> <out.svg>\n" +
    "       node dist/cli.js energy <energy.csv> <out.svg>\n",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    usage();
  }
  const [kind, input, output] = argv;
  let render: (csv: string) => string;
  if (kind === "convergence") {
    render = plotConvergence;
  } else if (kind === "energy") {
    render = plotEnergy;
  } else {
    usage();
  }
  let csv: string;
  try {
    csv = readFileSync(input, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${input}: ${err}\n`);
    return 1;
  }
  let svg: string;
  try {
    svg = render(csv);
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
  writeFileSync(output, svg);
  process.stdout.write(`wrote ${output}\n`);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
