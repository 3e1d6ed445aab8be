/** Typed client for the prover workbench HTTP service.
 *
 * The service is the only source of truth: every method returns the
 * server's state document verbatim, and nothing here caches or mutates
 * proof state locally.
 */

export interface JudgementDoc {
  formula: string;
  world: string;
}

export interface SequentDoc {
  gamma: JudgementDoc[];
  delta: JudgementDoc[];
  goal: JudgementDoc;
}

export interface GoalDoc {
  gid: number;
  name: string;
  family: boolean;
  pretty: string;
  sequent?: SequentDoc;
  cases?: string[];
}

export interface SessionState {
  session: string;
  goals: GoalDoc[];
  complete: boolean;
  history: string[];
  witnesses: Record<string, string>;
  /** Tactic lines from the loaded script body, for replay. */
  tactics: string[];
}

export interface ExampleDoc {
  name: string;
  path: string;
  text: string;
}

/** A tactic or session error reported by the service (HTTP 4xx). */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ServiceError";
  }
}

async function unwrap<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail: unknown;
    try {
      detail = (await res.json()).detail;
    } catch {
      detail = await res.text();
    }
    throw new ServiceError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class WorkbenchApi {
  constructor(readonly baseUrl: string) {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
    return unwrap<T>(res);
  }

  async listExamples(): Promise<ExampleDoc[]> {
    return unwrap(await fetch(this.baseUrl + "/examples"));
  }

  /** Create a session from inline script text. */
  async createFromScript(script: string): Promise<SessionState> {
    return this.post("/sessions", { script });
  }

  /** Create a session from a script shipped under the service root. */
  async createFromPath(path: string): Promise<SessionState> {
    return this.post("/sessions", { path });
  }

  async getState(sid: string): Promise<SessionState> {
    return unwrap(await fetch(`${this.baseUrl}/sessions/${sid}`));
  }

  async applyTactic(
    sid: string,
    text: string,
    goal?: number,
  ): Promise<SessionState> {
    return this.post(`/sessions/${sid}/tactic`, { text, goal });
  }

  async undo(sid: string): Promise<SessionState> {
    return this.post(`/sessions/${sid}/undo`);
  }

  async hints(sid: string, goal?: number): Promise<string[]> {
    const suffix = goal === undefined ? "" : `?goal=${goal}`;
    const doc = await unwrap<{ hints: string[] }>(
      await fetch(`${this.baseUrl}/sessions/${sid}/hints${suffix}`),
    );
    return doc.hints;
  }

  /** The kernel-checked certificate, as the exact bytes the service sent. */
  async certificate(sid: string): Promise<Uint8Array> {
    const res = await fetch(`${this.baseUrl}/sessions/${sid}/certificate`);
    if (!res.ok) {
      let detail: unknown;
      try {
        detail = (await res.json()).detail;
      } catch {
        detail = await res.text();
      }
      throw new ServiceError(res.status, detail);
    }
    return new Uint8Array(await res.arrayBuffer());
  }

  async deleteSession(sid: string): Promise<void> {
    await unwrap(
      await fetch(`${this.baseUrl}/sessions/${sid}`, { method: "DELETE" }),
    );
  }
}
