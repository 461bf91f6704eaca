/**
 * JSON parsing that preserves the wire text of every number.
 *
 * The console must display numeric fields exactly as the service sent them
 * (no 1.50 -> "1.5" round-trips), and JSON.parse discards the source text.
 * This is a standard recursive-descent JSON parser whose only deviation is
 * that numbers come back as { value, text } pairs.
 */

export interface RawNumber {
  readonly value: number;
  readonly text: string;
}

export type RawJson =
  | null
  | boolean
  | string
  | RawNumber
  | RawJson[]
  | { [key: string]: RawJson };

export function isRawNumber(v: RawJson | undefined): v is RawNumber {
  return (
    typeof v === "object" &&
    v !== null &&
    !Array.isArray(v) &&
    typeof (v as { value?: unknown }).value === "number" &&
    typeof (v as { text?: unknown }).text === "string"
  );
}

export class JsonSyntaxError extends Error {
  constructor(message: string, readonly position: number) {
    super(`${message} at position ${position}`);
    this.name = "JsonSyntaxError";
  }
}

const WHITESPACE = new Set([" ", "\t", "\n", "\r"]);
const NUMBER_RE = /^-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/;
const ESCAPES: Record<string, string> = {
  '"': '"',
  "\\": "\\",
  "/": "/",
  b: "\b",
  f: "\f",
  n: "\n",
  r: "\r",
  t: "\t",
};

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  parse(): RawJson {
    this.skipWhitespace();
    const value = this.parseValue();
    this.skipWhitespace();
    if (this.pos !== this.text.length) {
      throw new JsonSyntaxError("trailing characters", this.pos);
    }
    return value;
  }

  private fail(message: string): never {
    throw new JsonSyntaxError(message, this.pos);
  }

  private skipWhitespace(): void {
    while (this.pos < this.text.length && WHITESPACE.has(this.text[this.pos]!)) {
      this.pos += 1;
    }
  }

  private parseValue(): RawJson {
    const c = this.text[this.pos];
    if (c === undefined) this.fail("unexpected end of input");
    if (c === "{") return this.parseObject();
    if (c === "[") return this.parseArray();
    if (c === '"') return this.parseString();
    if (c === "-" || (c >= "0" && c <= "9")) return this.parseNumber();
    if (this.text.startsWith("true", this.pos)) {
      this.pos += 4;
      return true;
    }
    if (this.text.startsWith("false", this.pos)) {
      this.pos += 5;
      return false;
    }
    if (this.text.startsWith("null", this.pos)) {
      this.pos += 4;
      return null;
    }
    this.fail(`unexpected character ${JSON.stringify(c)}`);
  }

  private parseNumber(): RawNumber {
    const match = NUMBER_RE.exec(this.text.slice(this.pos));
    if (match === null) this.fail("malformed number");
    const text = match[0];
    this.pos += text.length;
    return { value: Number(text), text };
  }

  private parseString(): string {
    this.pos += 1; // opening quote
    let out = "";
    for (;;) {
      const c = this.text[this.pos];
      if (c === undefined) this.fail("unterminated string");
      if (c === '"') {
        this.pos += 1;
        return out;
      }
      if (c === "\\") {
        const esc = this.text[this.pos + 1];
        if (esc === undefined) this.fail("unterminated escape");
        if (esc === "u") {
          const hex = this.text.slice(this.pos + 2, this.pos + 6);
          if (!/^[0-9a-fA-F]{4}$/.test(hex)) this.fail("malformed unicode escape");
          out += String.fromCharCode(parseInt(hex, 16));
          this.pos += 6;
          continue;
        }
        const mapped = ESCAPES[esc];
        if (mapped === undefined) this.fail(`invalid escape \\${esc}`);
        out += mapped;
        this.pos += 2;
        continue;
      }
      out += c;
      this.pos += 1;
    }
  }

  private parseObject(): { [key: string]: RawJson } {
    this.pos += 1; // {
    const out: { [key: string]: RawJson } = {};
    this.skipWhitespace();
    if (this.text[this.pos] === "}") {
      this.pos += 1;
      return out;
    }
    for (;;) {
      this.skipWhitespace();
      if (this.text[this.pos] !== '"') this.fail("expected object key");
      const key = this.parseString();
      this.skipWhitespace();
      if (this.text[this.pos] !== ":") this.fail("expected ':'");
      this.pos += 1;
      this.skipWhitespace();
      out[key] = this.parseValue();
      this.skipWhitespace();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos += 1;
        continue;
      }
      if (c === "}") {
        this.pos += 1;
        return out;
      }
      this.fail("expected ',' or '}'");
    }
  }

  private parseArray(): RawJson[] {
    this.pos += 1; // [
    const out: RawJson[] = [];
    this.skipWhitespace();
    if (this.text[this.pos] === "]") {
      this.pos += 1;
      return out;
    }
    for (;;) {
      this.skipWhitespace();
      out.push(this.parseValue());
      this.skipWhitespace();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos += 1;
        continue;
      }
      if (c === "]") {
        this.pos += 1;
        return out;
      }
      this.fail("expected ',' or ']'");
    }
  }
}

export function parseRaw(text: string): RawJson {
  return new Parser(text).parse();
}

// -- typed accessors ---------------------------------------------------------
// The service contract is stable; a shape mismatch is a bug worth a loud error.

export function asObject(v: RawJson | undefined, where: string): { [key: string]: RawJson } {
  if (typeof v !== "object" || v === null || Array.isArray(v) || isRawNumber(v)) {
    throw new TypeError(`${where}: expected object`);
  }
  return v;
}

export function asArray(v: RawJson | undefined, where: string): RawJson[] {
  if (!Array.isArray(v)) throw new TypeError(`${where}: expected array`);
  return v;
}

export function asString(v: RawJson | undefined, where: string): string {
  if (typeof v !== "string") throw new TypeError(`${where}: expected string`);
  return v;
}

export function asNumber(v: RawJson | undefined, where: string): RawNumber {
  if (!isRawNumber(v)) throw new TypeError(`${where}: expected number`);
  return v;
}

export function asBoolean(v: RawJson | undefined, where: string): boolean {
  if (typeof v !== "boolean") throw new TypeError(`${where}: expected boolean`);
  return v;
}

export function orNull<T>(
  v: RawJson | undefined,
  where: string,
  cast: (v: RawJson | undefined, where: string) => T,
): T | null {
  return v === null || v === undefined ? null : cast(v, where);
}
