import { readFileSync } from "node:fs";

export interface Table {
    header: string[];
    rows: string[][];
}

export function readCsv(path: string): Table {
    const text = readFileSync(path, "utf-8");
    const lines = text.split("\n").filter(l => l.length > 0);
    if (lines.length === 0) {
        throw new Error(`empty CSV file: ${path}`);
    }
    const header = lines[0].split(",");
    const rows = lines.slice(1).map(l => l.split(","));
    return { header, rows };
}

export function column(table: Table, name: string): number[] {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
        throw new Error(`CSV has no column '${name}' (header: ${table.header.join(",")})`);
    }
    return table.rows.map(r => Number(r[idx]));
}

export function stringColumn(table: Table, name: string): string[] {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
        throw new Error(`CSV has no column '${name}'`);
    }
    return table.rows.map(r => r[idx]);
}
