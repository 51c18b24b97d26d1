/** Thin fetch client for the arena JSON API. */

import type { AnnotationBody, NextMatchResponse, SubmitResult } from "./types.js";

export class ArenaClient {
  constructor(private readonly baseUrl: string = "") {}

  /** Absolute form of a (possibly relative) clip URL. */
  clipUrl(path: string): string {
    return path.startsWith("http") ? path : this.baseUrl + path;
  }

  async nextMatch(annotatorId: string): Promise<NextMatchResponse> {
    const response = await fetch(
      `${this.baseUrl}/api/v1/session/${encodeURIComponent(annotatorId)}/next-match`,
    );
    if (!response.ok) {
      throw new Error(`next-match failed with status ${response.status}`);
    }
    return (await response.json()) as NextMatchResponse;
  }

  /**
   * Submit an annotation. Conflicts (someone already annotated this match
   * under this id) are a normal outcome, not an exception; network-level
   * failures surface as `error` so the caller can keep the answers around.
   */
  async submitAnnotation(body: AnnotationBody): Promise<SubmitResult> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/api/v1/annotations`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (exc) {
      return { kind: "error", message: exc instanceof Error ? exc.message : String(exc) };
    }
    if (response.status === 201) {
      return { kind: "recorded" };
    }
    if (response.status === 409) {
      return { kind: "conflict" };
    }
    let detail = `status ${response.status}`;
    try {
      const payload = (await response.json()) as { detail?: string };
      if (payload.detail) detail = payload.detail;
    } catch {
      // keep the status text
    }
    return { kind: "error", message: detail };
  }
}
