/** DOM rendering for one blinded match and the session screens.
 *
 * A match renders exactly once: the Left/Right assignment, clip sources and
 * question order never change afterwards, only enabled/disabled state and
 * status text. All controls are native form elements, so the whole page is
 * keyboard-operable (tab between fieldsets, arrows within a radio group,
 * space/enter to choose and submit).
 */

import { AnswerForm } from "./form.js";
import {
  ANSWER_OPTIONS,
  CRITERIA,
  CRITERION_QUESTIONS,
  type Criterion,
  type MatchView,
} from "./types.js";

export type ClipState = "loading" | "ready" | "failed";

export interface MatchPageHandlers {
  onSubmit: (form: AnswerForm) => void;
}

export class MatchPage {
  readonly form = new AnswerForm();
  private readonly clipStates: Record<"left" | "right", ClipState> = {
    left: "loading",
    right: "loading",
  };
  private submitButton!: HTMLButtonElement;
  private statusLine!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly view: MatchView,
    private readonly handlers: MatchPageHandlers,
    private readonly resolveClipUrl: (path: string) => string = (p) => p,
  ) {
    this.render();
  }

  private render(): void {
    this.root.textContent = "";

    const header = el("header");
    const progress = el("p", "progress");
    progress.textContent = `Annotated ${this.view.progress.done} of ${this.view.progress.total}`;
    header.appendChild(progress);
    this.root.appendChild(header);

    const prompt = el("section", "prompt");
    const promptText = el("p", "prompt-text");
    promptText.textContent = this.view.prompt_text;
    prompt.appendChild(promptText);
    this.root.appendChild(prompt);

    const players = el("section", "players");
    players.appendChild(this.renderPlayer("left", this.view.clip_left_url));
    players.appendChild(this.renderPlayer("right", this.view.clip_right_url));
    this.root.appendChild(players);

    const form = el("form", "answers") as HTMLFormElement;
    form.setAttribute("data-match-id", this.view.match_id);
    for (const criterion of CRITERIA) {
      form.appendChild(this.renderQuestion(criterion));
    }
    this.submitButton = el("button", "submit") as HTMLButtonElement;
    this.submitButton.type = "submit";
    this.submitButton.disabled = true;
    this.submitButton.textContent = "Submit answers";
    form.appendChild(this.submitButton);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (this.canSubmit()) {
        this.handlers.onSubmit(this.form);
      }
    });
    this.root.appendChild(form);

    this.statusLine = el("p", "status");
    this.statusLine.setAttribute("role", "status");
    this.root.appendChild(this.statusLine);
  }

  private renderPlayer(side: "left" | "right", clipPath: string): HTMLElement {
    const block = el("div", "player");
    block.setAttribute("data-side", side);
    const title = el("h2");
    title.textContent = side === "left" ? "Left" : "Right";
    block.appendChild(title);

    const audio = el("audio") as HTMLAudioElement;
    audio.controls = true;
    audio.preload = "auto";
    audio.src = this.resolveClipUrl(clipPath);
    audio.setAttribute(
      "aria-label",
      side === "left" ? "Left clip player" : "Right clip player",
    );
    block.appendChild(audio);

    const retry = el("button", "retry") as HTMLButtonElement;
    retry.type = "button";
    retry.textContent = `Retry ${side} clip`;
    retry.hidden = true;
    block.appendChild(retry);

    audio.addEventListener("error", () => {
      this.clipStates[side] = "failed";
      retry.hidden = false;
      this.setStatus(`The ${side} clip failed to load. Retry before submitting.`);
      this.refreshSubmit();
    });
    const markReady = () => {
      this.clipStates[side] = "ready";
      retry.hidden = true;
      this.refreshSubmit();
    };
    audio.addEventListener("canplay", markReady);
    audio.addEventListener("loadeddata", markReady);
    retry.addEventListener("click", () => {
      this.clipStates[side] = "loading";
      retry.hidden = true;
      this.setStatus("");
      // Re-request the same source; the assignment never changes.
      audio.src = this.resolveClipUrl(clipPath);
      audio.load?.();
      this.refreshSubmit();
    });
    return block;
  }

  private renderQuestion(criterion: Criterion): HTMLElement {
    const fieldset = el("fieldset", "question") as HTMLFieldSetElement;
    fieldset.setAttribute("data-criterion", criterion);
    const legend = el("legend");
    legend.textContent = CRITERION_QUESTIONS[criterion];
    fieldset.appendChild(legend);
    for (const option of ANSWER_OPTIONS) {
      const label = el("label", "option");
      const input = el("input") as HTMLInputElement;
      input.type = "radio";
      input.name = criterion;
      input.value = option.token;
      input.addEventListener("change", () => {
        this.form.set(criterion, option.token);
        this.refreshSubmit();
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(" " + option.label));
      fieldset.appendChild(label);
    }
    return fieldset;
  }

  private canSubmit(): boolean {
    return (
      this.form.isComplete() &&
      this.clipStates.left !== "failed" &&
      this.clipStates.right !== "failed"
    );
  }

  private refreshSubmit(): void {
    this.submitButton.disabled = !this.canSubmit();
  }

  setStatus(message: string): void {
    this.statusLine.textContent = message;
  }

  /** Disable inputs while a submission is in flight. */
  setBusy(busy: boolean): void {
    this.submitButton.disabled = busy || !this.canSubmit();
  }
}

export function renderDoneScreen(root: HTMLElement, annotated: number): void {
  root.textContent = "";
  const section = el("section", "done");
  const heading = el("h1");
  heading.textContent = "All done";
  const summary = el("p", "summary");
  summary.textContent =
    annotated === 1
      ? "You annotated 1 match this session. Nothing is waiting for you."
      : `You annotated ${annotated} matches this session. Nothing is waiting for you.`;
  section.appendChild(heading);
  section.appendChild(summary);
  root.appendChild(section);
}

export function renderFatalError(root: HTMLElement, message: string): void {
  root.textContent = "";
  const section = el("section", "fatal");
  const heading = el("h1");
  heading.textContent = "Something went wrong";
  const detail = el("p", "detail");
  detail.textContent = message;
  section.appendChild(heading);
  section.appendChild(detail);
  root.appendChild(section);
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
