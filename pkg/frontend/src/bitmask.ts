// Brick bitmask model mirroring the service's text format:
// first line "<cols> <rows>", then rows of '#'/'.', top row first.

export interface Bitmask {
  cols: number;
  rows: number;
  cells: boolean[]; // row-major, top row first
}

export function parseBitmask(text: string): Bitmask {
  const lines = text.split(/\r?\n/).filter((l, i) => i === 0 || l.length > 0);
  if (lines.length === 0) throw new Error("empty bitmask text");
  const header = lines[0].trim().split(/\s+/);
  if (header.length !== 2) throw new Error(`bad header line: ${lines[0]}`);
  const cols = Number(header[0]);
  const rows = Number(header[1]);
  if (!Number.isInteger(cols) || !Number.isInteger(rows) || cols < 1 || rows < 1) {
    throw new Error(`bad grid size ${header.join("x")}`);
  }
  if (lines.length - 1 < rows) throw new Error(`expected ${rows} rows, got ${lines.length - 1}`);
  const cells: boolean[] = new Array(cols * rows).fill(false);
  for (let r = 0; r < rows; r++) {
    const line = lines[1 + r];
    if (line.length !== cols) throw new Error(`row ${r + 1} has ${line.length} cells, expected ${cols}`);
    for (let c = 0; c < cols; c++) {
      const ch = line[c];
      if (ch !== "#" && ch !== ".") throw new Error(`bad cell '${ch}' in row ${r + 1}`);
      cells[r * cols + c] = ch === "#";
    }
  }
  return { cols, rows, cells };
}

export function formatBitmask(m: Bitmask): string {
  let out = `${m.cols} ${m.rows}\n`;
  for (let r = 0; r < m.rows; r++) {
    for (let c = 0; c < m.cols; c++) {
      out += m.cells[r * m.cols + c] ? "#" : ".";
    }
    out += "\n";
  }
  return out;
}

export function emptyBitmask(cols: number, rows: number): Bitmask {
  return { cols, rows, cells: new Array(cols * rows).fill(false) };
}

export function isFilled(m: Bitmask, row: number, col: number): boolean {
  return m.cells[row * m.cols + col];
}

export function toggleCell(m: Bitmask, row: number, col: number): Bitmask {
  if (row < 0 || row >= m.rows || col < 0 || col >= m.cols) return m;
  const cells = m.cells.slice();
  cells[row * m.cols + col] = !cells[row * m.cols + col];
  return { ...m, cells };
}

export function filledCount(m: Bitmask): number {
  return m.cells.reduce((acc, v) => acc + (v ? 1 : 0), 0);
}
