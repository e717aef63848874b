// Renders the service's canonical JSON view (column index -> row index -> cell)
// back into an HTML table. Cell text is set via textContent so the displayed
// value stays byte-equal to what the service sent.

export type JsonGrid = Record<string, Record<string, string>>;

export function parseJsonView(rendered: string): JsonGrid {
    return JSON.parse(rendered) as JsonGrid;
}

export function gridCellCount(grid: JsonGrid): number {
    let n = 0;
    for (const col of Object.values(grid)) {
        n += Object.keys(col).length;
    }
    return n;
}

export function renderGrid(doc: Document, grid: JsonGrid): HTMLTableElement {
    const cols = Object.keys(grid).map(Number).sort((a, b) => a - b);
    let nRows = 0;
    for (const c of cols) {
        for (const r of Object.keys(grid[String(c)])) {
            nRows = Math.max(nRows, Number(r) + 1);
        }
    }

    const table = doc.createElement("table");
    table.className = "grid";
    for (let r = 0; r < nRows; r++) {
        const tr = doc.createElement("tr");
        for (const c of cols) {
            const td = doc.createElement("td");
            const cell = grid[String(c)][String(r)];
            if (cell === undefined) {
                // ragged row: the view has no cell here, keep the slot visually
                // but leave it unmarked so it does not count as a cell
                td.className = "gap";
            } else {
                td.className = "cell";
                td.textContent = cell;
            }
            tr.appendChild(td);
        }
        table.appendChild(tr);
    }
    return table;
}

export function renderedCellCount(table: HTMLTableElement): number {
    return table.querySelectorAll("td.cell").length;
}
