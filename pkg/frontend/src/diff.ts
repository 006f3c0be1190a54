/** Line-level diff between two script versions (LCS based).
 * Scripts here are small (tens of lines), so the quadratic table is fine. */

export type DiffKind = "same" | "add" | "del";

export interface DiffOp {
  kind: DiffKind;
  text: string;
}

function splitLines(text: string): string[] {
  if (text === "") {
    return [];
  }
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") {
    lines.pop(); // trailing newline does not add an empty line
  }
  return lines;
}

export function diffLines(before: string, after: string): DiffOp[] {
  const a = splitLines(before);
  const b = splitLines(after);
  const n = a.length;
  const m = b.length;
  // lcs[i][j] = LCS length of a[i:] and b[j:]
  const lcs: number[][] = Array.from({ length: n + 1 }, () =>
    new Array<number>(m + 1).fill(0),
  );
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      lcs[i][j] =
        a[i] === b[j]
          ? lcs[i + 1][j + 1] + 1
          : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const ops: DiffOp[] = [];
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (a[i] === b[j]) {
      ops.push({ kind: "same", text: a[i] });
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      ops.push({ kind: "del", text: a[i] });
      i++;
    } else {
      ops.push({ kind: "add", text: b[j] });
      j++;
    }
  }
  for (; i < n; i++) {
    ops.push({ kind: "del", text: a[i] });
  }
  for (; j < m; j++) {
    ops.push({ kind: "add", text: b[j] });
  }
  return ops;
}

export function diffStats(ops: DiffOp[]): { added: number; removed: number } {
  let added = 0;
  let removed = 0;
  for (const op of ops) {
    if (op.kind === "add") added++;
    if (op.kind === "del") removed++;
  }
  return { added, removed };
}

/** Rebuild the "after" side from a diff; used to check the diff is lossless. */
export function applyDiff(ops: DiffOp[]): string {
  const lines = ops.filter((op) => op.kind !== "del").map((op) => op.text);
  return lines.length ? lines.join("\n") + "\n" : "";
}
