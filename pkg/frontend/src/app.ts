// View state and DOM wiring. One in-flight query at a time; the submit
// button stays disabled while a question is empty or a query is pending.

import { getHealth, postQuery, type QueryOutcome, type QueryRequest } from "./api.js";
import {
  canSubmit,
  renderError,
  renderHealth,
  renderHistory,
  renderResult,
  type HistoryEntry,
} from "./render.js";

interface Elements {
  form: HTMLFormElement;
  question: HTMLInputElement;
  strategy: HTMLSelectElement;
  k: HTMLInputElement;
  generate: HTMLInputElement;
  submit: HTMLButtonElement;
  result: HTMLElement;
  history: HTMLElement;
  health: HTMLElement;
}

export class App {
  private history: HistoryEntry[] = []; // append-only within the session
  private pending = false;

  constructor(private readonly el: Elements) {}

  start(): void {
    this.el.question.addEventListener("input", () => this.refreshSubmit());
    this.el.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    this.refreshSubmit();
    this.renderHistoryPanel();
    void this.loadHealth();
  }

  private refreshSubmit(): void {
    this.el.submit.disabled = !canSubmit(this.el.question.value, this.pending);
  }

  private async loadHealth(): Promise<void> {
    const health = await getHealth();
    if (!health) {
      this.el.health.textContent = "engine offline";
      return;
    }
    if (health.status === "no_index") {
      this.el.health.textContent = "no index loaded";
      return;
    }
    this.el.health.textContent = renderHealth(
      health.num_docs,
      health.num_chunks,
      health.provider,
    );
  }

  private request(generate: boolean): QueryRequest {
    return {
      question: this.el.question.value.trim(),
      strategy: this.el.strategy.value,
      k: Number(this.el.k.value) || 3,
      generate,
    };
  }

  async submit(): Promise<void> {
    if (!canSubmit(this.el.question.value, this.pending)) return;
    this.pending = true;
    this.refreshSubmit();
    try {
      const req = this.request(this.el.generate.checked);
      let outcome = await postQuery(req);
      let sourcesOnlyNote = "";
      if (
        outcome.kind === "error" &&
        outcome.error.status === 503 &&
        outcome.error.stage === "generate"
      ) {
        // generator offline: fall back to sources-only mode
        outcome = await postQuery({ ...req, generate: false });
        sourcesOnlyNote = "generator offline - showing sources only";
      }
      this.renderOutcome(outcome, req, sourcesOnlyNote);
    } finally {
      this.pending = false;
      this.refreshSubmit();
    }
  }

  private renderOutcome(outcome: QueryOutcome, req: QueryRequest, note: string): void {
    if (outcome.kind === "error") {
      this.el.result.innerHTML = renderError(outcome.error);
      return;
    }
    const parts: string[] = [];
    if (note) {
      parts.push(`<div class="banner banner-info">${note}</div>`);
    }
    parts.push(renderResult(outcome.response));
    this.el.result.innerHTML = parts.join("\n");
    this.history.push({
      question: req.question,
      strategy: outcome.response.strategy,
      k: outcome.response.k,
      answer: outcome.response.answer,
      chunkCount: outcome.response.chunks.length,
    });
    this.renderHistoryPanel();
  }

  private renderHistoryPanel(): void {
    this.el.history.innerHTML = renderHistory(this.history);
  }
}

export function mount(root: Document): App {
  const get = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  const app = new App({
    form: get<HTMLFormElement>("query-form"),
    question: get<HTMLInputElement>("question"),
    strategy: get<HTMLSelectElement>("strategy"),
    k: get<HTMLInputElement>("top-k"),
    generate: get<HTMLInputElement>("generate"),
    submit: get<HTMLButtonElement>("submit"),
    result: get("result"),
    history: get("history"),
    health: get("health"),
  });
  app.start();
  return app;
}
