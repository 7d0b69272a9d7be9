#!/usr/bin/env node
import { loadRecipe } from "./recipe.js";
import { renderToFile } from "./render.js";

function usage(): never {
    console.error("usage: render-figure render --recipe PATH --out IMAGE.svg");
    process.exit(2);
}

export function main(argv: string[]): number {
    if (argv[0] !== "render") {
        usage();
    }
    let recipePath = "";
    let outPath = "";
    for (let i = 1; i < argv.length; i += 2) {
        if (argv[i] === "--recipe") {
            recipePath = argv[i + 1];
        } else if (argv[i] === "--out") {
            outPath = argv[i + 1];
        } else {
            usage();
        }
    }
    if (!recipePath || !outPath) {
        usage();
    }
    try {
        renderToFile(loadRecipe(recipePath), outPath);
    } catch (err) {
        console.error(`render failed: ${(err as Error).message}`);
        return 1;
    }
    console.error(`wrote ${outPath}`);
    return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
    process.exit(main(process.argv.slice(2)));
}
