// Pure HTML renderers. Everything here is a string-in/string-out function
// so fidelity against recorded API fixtures is testable without a DOM.
// Chunks and scores are rendered exactly as the API returned them: never
// reordered, filtered, or rewritten.

import type { ApiError, ChunkPayload, QueryResponse } from "./api.js";

export const COLLAPSE_THRESHOLD = 500;
export const NO_CONTEXT_BANNER = "no context above threshold";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatScore(score: number): string {
  return score.toFixed(3);
}

export function canSubmit(question: string, pending: boolean): boolean {
  return question.trim().length > 0 && !pending;
}

export function renderSourceCard(chunk: ChunkPayload): string {
  const collapsed = chunk.text.length > COLLAPSE_THRESHOLD;
  const body = collapsed
    ? `<details class="chunk-text"><summary>${escapeHtml(
        chunk.text.slice(0, COLLAPSE_THRESHOLD),
      )}&hellip; <span class="expand">show all</span></summary>${escapeHtml(
        chunk.text,
      )}</details>`
    : `<p class="chunk-text">${escapeHtml(chunk.text)}</p>`;
  return `<article class="card" data-chunk-id="${escapeHtml(chunk.chunk_id)}" data-rank="${chunk.rank}">
  <header>
    <span class="rank">#${chunk.rank}</span>
    <span class="title">${escapeHtml(chunk.title || chunk.doc_id)}</span>
    <span class="category">${escapeHtml(chunk.category)}</span>
    <span class="score">score ${formatScore(chunk.score)}</span>
  </header>
  ${body}
</article>`;
}

export function renderSources(chunks: ChunkPayload[]): string {
  if (!chunks.length) return "";
  return `<section class="sources">${chunks.map(renderSourceCard).join("\n")}</section>`;
}

export function renderAnswer(answer: string | undefined): string {
  if (answer === undefined) return "";
  return `<section class="answer"><h2>Answer</h2><p>${escapeHtml(answer)}</p></section>`;
}

export function renderBanner(message: string, kind: "info" | "error" = "info"): string {
  return `<div class="banner banner-${kind}">${escapeHtml(message)}</div>`;
}

export function renderTimings(timings: Record<string, number>): string {
  const parts = Object.entries(timings).map(
    ([stage, ms]) => `${escapeHtml(stage)} ${ms.toFixed(1)} ms`,
  );
  if (!parts.length) return "";
  return `<footer class="timings">${parts.join(" · ")}</footer>`;
}

export function renderResult(response: QueryResponse): string {
  const pieces: string[] = [];
  if (!response.chunks.length) {
    // zero hits (rerank over-filtering): banner, never a fabricated answer
    pieces.push(renderBanner(NO_CONTEXT_BANNER));
  } else {
    pieces.push(renderAnswer(response.answer));
    pieces.push(renderSources(response.chunks));
  }
  pieces.push(renderTimings(response.timings_ms));
  return pieces.filter(Boolean).join("\n");
}

export function renderError(error: ApiError): string {
  const stage = error.stage ? ` (stage: ${error.stage})` : "";
  return renderBanner(`${error.message}${stage}`, "error");
}

export interface HistoryEntry {
  question: string;
  strategy: string;
  k: number;
  answer?: string;
  chunkCount: number;
}

export function renderHistory(entries: HistoryEntry[]): string {
  if (!entries.length) return '<p class="empty">No queries yet.</p>';
  const items = entries
    .map(
      (e, i) => `<li data-index="${i}">
  <span class="q">${escapeHtml(e.question)}</span>
  <span class="meta">${escapeHtml(e.strategy)} · k=${e.k} · ${e.chunkCount} source${
        e.chunkCount === 1 ? "" : "s"
      }</span>
</li>`,
    )
    .join("\n");
  return `<ol class="history">${items}</ol>`;
}

export function renderHealth(numDocs: number, numChunks: number, provider: string | null): string {
  return `corpus: ${numDocs} documents · ${numChunks} chunks · embeddings: ${
    provider ?? "none"
  }`;
}
