/** Render canonical logical forms in a compact infix style.
 *
 * The canonical language is s-expressions; annotators read infix better, so
 * the result screen shows `R[Venue].argmax(Position.1st, Index)` instead of
 * the nested join/map spelling.  The mapping:
 *
 *   (entity "v") / (number n) / (date d)  ->  v / n / d
 *   (rows)                                ->  Rows
 *   (reverse Name)                        ->  R[Name]
 *   (join rel s)                          ->  rel.s   (comparisons: op(s))
 *   (and a b) / (or a b) / (sub a b)      ->  (a & b) / (a | b) / (a - b)
 *   (count s), (max s), ...               ->  count(s), max(s), ...
 *   (argmax (map u c))                    ->  argmax(u, c')
 *
 * where a map chain c' drops the variable: the common one-step chain
 * (join (reverse Name) x) reads as just `Name`, anything longer keeps its
 * structure with `x` visible.  Unparseable input raises PrettyError; callers
 * fall back to the canonical text.
 */

type SExpr = string | SExpr[];

export class PrettyError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PrettyError";
  }
}

const TOKEN = /"(?:[^"\\]|\\.)*"|[()]|[^\s()"]+/g;
const COMPARISONS = new Set(["<", ">", "<=", ">=", "!="]);
const AGGREGATES = new Set(["count", "max", "min", "sum"]);
const SET_OPS: Record<string, string> = { and: "&", or: "|", sub: "-" };

function parse(canon: string): SExpr {
  const tokens = canon.match(TOKEN);
  if (!tokens) throw new PrettyError("empty form");
  let pos = 0;
  function node(): SExpr {
    const tok = tokens![pos++];
    if (tok === undefined) throw new PrettyError("unexpected end of form");
    if (tok === "(") {
      const items: SExpr[] = [];
      while (tokens![pos] !== ")") {
        if (tokens![pos] === undefined) throw new PrettyError("unbalanced parens");
        items.push(node());
      }
      pos++;
      return items;
    }
    if (tok === ")") throw new PrettyError("unbalanced parens");
    return tok;
  }
  const root = node();
  if (pos !== tokens.length) throw new PrettyError("trailing tokens");
  return root;
}

function head(e: SExpr): string | null {
  return Array.isArray(e) && typeof e[0] === "string" ? e[0] : null;
}

function renderRel(e: SExpr): string {
  if (typeof e === "string") return e;
  if (head(e) === "reverse" && e.length === 2 && typeof e[1] === "string") {
    return `R[${e[1]}]`;
  }
  throw new PrettyError("malformed relation");
}

function renderChain(e: SExpr): string {
  if (e === "x") return "x";
  if (
    head(e) === "join" &&
    e.length === 3 &&
    head(e[1]) === "reverse" &&
    e[2] === "x"
  ) {
    const rel = e[1] as SExpr[];
    if (typeof rel[1] === "string") return rel[1];
  }
  return render(e);
}

function render(e: SExpr): string {
  if (typeof e === "string") {
    if (e === "x") return "x";
    throw new PrettyError(`bare atom ${e}`);
  }
  const op = head(e);
  if (op === "entity" && e.length === 2 && typeof e[1] === "string") {
    return (e[1] as string).replace(/^"|"$/g, "");
  }
  if ((op === "number" || op === "date") && e.length === 2 && typeof e[1] === "string") {
    return e[1] as string;
  }
  if (op === "row" && e.length === 2 && typeof e[1] === "string") {
    return `r${e[1]}`;
  }
  if (op === "rows" && e.length === 1) return "Rows";
  if (op === "join" && e.length === 3) {
    const rel = renderRel(e[1]);
    const arg = render(e[2]);
    return COMPARISONS.has(rel) ? `${rel}(${arg})` : `${rel}.${arg}`;
  }
  if (op !== null && op in SET_OPS && e.length === 3) {
    return `(${render(e[1])} ${SET_OPS[op]} ${render(e[2])})`;
  }
  if (op !== null && AGGREGATES.has(op) && e.length === 2) {
    return `${op}(${render(e[1])})`;
  }
  if (op === "map" && e.length === 3) {
    return `map(${render(e[1])}, ${renderChain(e[2])})`;
  }
  if ((op === "argmax" || op === "argmin") && e.length === 2) {
    const m = e[1];
    if (head(m) !== "map" || (m as SExpr[]).length !== 3) {
      throw new PrettyError(`${op} needs a map`);
    }
    const [, unary, chain] = m as SExpr[];
    return `${op}(${render(unary)}, ${renderChain(chain)})`;
  }
  throw new PrettyError(`unknown operator ${op ?? "(list)"}`);
}

/** Pretty-print one canonical form; throws PrettyError on malformed input. */
export function prettyForm(canon: string): string {
  return render(parse(canon));
}

/** Pretty-print, falling back to the canonical text if parsing fails. */
export function prettyOrCanon(canon: string): string {
  try {
    return prettyForm(canon);
  } catch {
    return canon;
  }
}
