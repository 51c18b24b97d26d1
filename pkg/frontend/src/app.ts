/** Session controller: fetch a match, collect answers, submit, repeat. */

import { ArenaClient } from "./api.js";
import type { AnswerForm } from "./form.js";
import type { MatchView } from "./types.js";
import { MatchPage, renderDoneScreen, renderFatalError } from "./view.js";

export class AnnotationApp {
  private annotatedThisSession = 0;
  private page: MatchPage | null = null;
  private current: MatchView | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ArenaClient,
    private readonly annotatorId: string,
  ) {}

  /** Fetch and render the next pending match, or the completion screen. */
  async advance(): Promise<void> {
    let response;
    try {
      response = await this.client.nextMatch(this.annotatorId);
    } catch (exc) {
      renderFatalError(
        this.root,
        exc instanceof Error ? exc.message : String(exc),
      );
      return;
    }
    if (response.done || response.match === null) {
      this.page = null;
      this.current = null;
      renderDoneScreen(this.root, this.annotatedThisSession);
      return;
    }
    this.current = response.match;
    this.page = new MatchPage(
      this.root,
      response.match,
      { onSubmit: (form) => void this.submit(form) },
      (path) => this.client.clipUrl(path),
    );
  }

  /**
   * Submit the completed form. Success and conflicts both advance (a
   * conflict means this match was already annotated under our id);
   * transport errors keep the page and the chosen answers so the
   * annotator can retry without re-answering.
   */
  async submit(form: AnswerForm): Promise<void> {
    if (!this.page || !this.current) return;
    const page = this.page;
    const match = this.current;
    page.setBusy(true);
    page.setStatus("Submitting…");
    const result = await this.client.submitAnnotation({
      match_id: match.match_id,
      annotator_id: this.annotatorId,
      answers: form.toPayload(),
    });
    if (result.kind === "recorded") {
      this.annotatedThisSession += 1;
      await this.advance();
      return;
    }
    if (result.kind === "conflict") {
      page.setStatus("This match was already annotated; moving on.");
      await this.advance();
      return;
    }
    // Network or server trouble: answers stay selected, retry is manual.
    page.setBusy(false);
    page.setStatus(`Submission failed (${result.message}). Your answers are kept; submit again.`);
  }
}

export interface BootOptions {
  /** API base URL; empty string means same origin. */
  apiBase?: string;
  annotatorId: string;
}

export function boot(root: HTMLElement, options: BootOptions): AnnotationApp {
  const app = new AnnotationApp(
    root,
    new ArenaClient(options.apiBase ?? ""),
    options.annotatorId,
  );
  void app.advance();
  return app;
}
