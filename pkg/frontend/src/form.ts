/** Pure answer-form state: which criteria are answered, completeness. */

import { ANSWER_OPTIONS, CRITERIA } from "./types.js";
import type { AnswerToken, Criterion } from "./types.js";

const VALID_TOKENS = new Set<string>(ANSWER_OPTIONS.map((o) => o.token));

export class AnswerForm {
  private readonly answers = new Map<Criterion, AnswerToken>();

  set(criterion: Criterion, token: AnswerToken): void {
    if (!VALID_TOKENS.has(token)) {
      throw new Error(`unknown answer token: ${token}`);
    }
    this.answers.set(criterion, token);
  }

  get(criterion: Criterion): AnswerToken | undefined {
    return this.answers.get(criterion);
  }

  /** All five criteria answered? Submit stays disabled until then. */
  isComplete(): boolean {
    return CRITERIA.every((criterion) => this.answers.has(criterion));
  }

  missing(): Criterion[] {
    return CRITERIA.filter((criterion) => !this.answers.has(criterion));
  }

  toPayload(): Record<Criterion, AnswerToken> {
    if (!this.isComplete()) {
      throw new Error(`form incomplete; missing: ${this.missing().join(", ")}`);
    }
    const payload = {} as Record<Criterion, AnswerToken>;
    for (const criterion of CRITERIA) {
      payload[criterion] = this.answers.get(criterion)!;
    }
    return payload;
  }

  clear(): void {
    this.answers.clear();
  }
}
