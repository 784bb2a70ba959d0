// Edit buffer for the four conclusion fields, plus the local validation
// gate. Display strings are generated here from the structured values the
// server sent; the forms chosen are exactly the ones the server parses
// back to the same value, so what the reviewer sees is what the server
// holds, round-tripped.

import type { ConclusionWire, FineWire, PrisonTermWire } from "./types.js";

export interface EditBuffer {
  charges: string;
  articles: string;
  term: string;
  fine: string;
}

export type BufferField = keyof EditBuffer;

export type FieldMessages = Partial<Record<BufferField | "fact", string>>;

/** Arabic-digit phrasing; the server's numeral grammar accepts digits. */
export function termPhrase(t: PrisonTermWire): string {
  switch (t.kind) {
    case "none":
      return "无";
    case "fixed_term":
      return `有期徒刑${t.months}个月`;
    case "detention":
      return `拘役${t.months}个月`;
    case "life":
      return "无期徒刑";
    case "death":
      return "死刑";
  }
}

export function finePhrase(f: FineWire): string {
  switch (f.kind) {
    case "none":
      return "无";
    case "amount":
      return `人民币${f.cny}元`;
    case "confiscation":
      return "没收个人全部财产";
  }
}

export function bufferFromConclusion(j: ConclusionWire): EditBuffer {
  return {
    charges: j.charges.join(";"),
    articles: j.articles.join(";"),
    term: termPhrase(j.term),
    fine: finePhrase(j.fine),
  };
}

const ARTICLE_ID_RE = /^[^#\s]+#[1-9]\d*(\.[1-9]\d*)?$/;
// what the lightweight client-side numeral check accepts; the server
// grammar is the authority and is strictly wider
const NUMERALISH = "[0-9零一二三四五六七八九十百千两]+";
const TERM_RE = new RegExp(
  `^(无|免予刑事处罚|无期徒刑|死刑|\\d+|(有期徒刑|拘役)(${NUMERALISH}年)?(${NUMERALISH}个月)?)$`,
);
const FINE_RE = new RegExp(`^(无|没收个人全部财产|\\d+|(人民币)?${NUMERALISH}元)$`);

function splitList(value: string): string[] {
  return value
    .split(/[;；]/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

/** Field-by-field pre-flight; empty result means locally valid. */
export function validateBuffer(buffer: EditBuffer): FieldMessages {
  const messages: FieldMessages = {};
  const charges = splitList(buffer.charges);
  if (charges.length === 0) {
    messages.charges = "至少一项罪名";
  } else if (charges.some((c) => !c.endsWith("罪"))) {
    messages.charges = "罪名须以「罪」结尾";
  }
  const articles = splitList(buffer.articles);
  if (articles.length === 0) {
    messages.articles = "至少一条法条";
  } else if (articles.some((a) => !ARTICLE_ID_RE.test(a))) {
    messages.articles = "法条格式: 法名#条号 或 法名#条号.款号";
  }
  const term = buffer.term.trim();
  if (!TERM_RE.test(term)) {
    messages.term = "无法解析的刑期";
  } else if (/^(有期徒刑|拘役)$/.test(term)) {
    messages.term = "刑期缺少时长";
  }
  if (!FINE_RE.test(buffer.fine.trim())) {
    messages.fine = "无法解析的罚金";
  }
  return messages;
}

export function isSubmittable(buffer: EditBuffer): boolean {
  return Object.keys(validateBuffer(buffer)).length === 0;
}

/**
 * Patch containing only the fields the reviewer changed relative to the
 * server's conclusion. An untouched buffer yields {} and is still a legal
 * save (the server marks the conclusion human-edited either way).
 */
export function patchFromBuffer(
  buffer: EditBuffer,
  base: ConclusionWire,
): Record<string, unknown> {
  const baseline = bufferFromConclusion(base);
  const patch: Record<string, unknown> = {};
  if (buffer.charges.trim() !== baseline.charges) patch.charges = splitList(buffer.charges);
  if (buffer.articles.trim() !== baseline.articles) patch.articles = splitList(buffer.articles);
  if (buffer.term.trim() !== baseline.term) patch.term = buffer.term.trim();
  if (buffer.fine.trim() !== baseline.fine) patch.fine = buffer.fine.trim();
  return patch;
}

/** Field named by a server edit rejection ("invalid edit to term: ..."). */
export function rejectedField(detail: string): BufferField | null {
  const m = /^invalid edit to (charges|articles|term|fine):/.exec(detail);
  return m ? (m[1] as BufferField) : null;
}
