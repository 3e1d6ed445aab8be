/** View-model for the workbench: all proof-state transitions go through
 * the service; this layer only tracks which session is open, the last
 * server state document, and the last error to display inline.
 */

import {
  GoalDoc,
  ServiceError,
  SessionState,
  WorkbenchApi,
} from "./api.js";

export type Listener = (model: WorkbenchModel) => void;

export class WorkbenchModel {
  state: SessionState | null = null;
  /** Inline error from the last rejected request, or null. */
  error: string | null = null;
  /** Goal id the user selected, or null for the first open goal. */
  selected: number | null = null;
  private listeners: Listener[] = [];

  constructor(readonly api: WorkbenchApi) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this);
  }

  private setState(state: SessionState): void {
    this.state = state;
    this.error = null;
    if (
      this.selected !== null &&
      !state.goals.some((g) => g.gid === this.selected)
    ) {
      this.selected = null; // the selected goal was closed
    }
    this.emit();
  }

  private fail(err: unknown): void {
    this.error = err instanceof ServiceError ? err.message : String(err);
    this.emit();
  }

  get sid(): string {
    if (!this.state) throw new Error("no open session");
    return this.state.session;
  }

  get goals(): GoalDoc[] {
    return this.state?.goals ?? [];
  }

  get complete(): boolean {
    return this.state?.complete ?? false;
  }

  selectGoal(gid: number | null): void {
    this.selected = gid;
    this.emit();
  }

  async loadScript(text: string): Promise<void> {
    try {
      this.setState(await this.api.createFromScript(text));
    } catch (err) {
      this.fail(err);
      throw err;
    }
  }

  async loadPath(path: string): Promise<void> {
    try {
      this.setState(await this.api.createFromPath(path));
    } catch (err) {
      this.fail(err);
      throw err;
    }
  }

  /** Apply a tactic to the selected (or first open) goal.  On rejection
   * the server state is untouched and the error is kept for display. */
  async apply(text: string): Promise<boolean> {
    try {
      this.setState(
        await this.api.applyTactic(this.sid, text, this.selected ?? undefined),
      );
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  /** Replay a whole tactic transcript, stopping at the first failure. */
  async replay(lines: string[]): Promise<boolean> {
    for (const line of lines) {
      if (!(await this.apply(line))) return false;
    }
    return true;
  }

  async undo(): Promise<boolean> {
    try {
      this.setState(await this.api.undo(this.sid));
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async hints(): Promise<string[]> {
    try {
      return await this.api.hints(this.sid, this.selected ?? undefined);
    } catch (err) {
      this.fail(err);
      return [];
    }
  }

  /** Export the certificate; only available once every goal is closed. */
  async exportCertificate(): Promise<Uint8Array | null> {
    try {
      return await this.api.certificate(this.sid);
    } catch (err) {
      this.fail(err);
      return null;
    }
  }
}
