/** Review-loop wiring: fetch the next card, render highlights, submit the
 * decision, refresh progress and the live agreement panel. */

import { ApiClient, Decision, ReviewInstance } from "./api.js";
import { HELP_HTML } from "./help.js";
import { splitSegments } from "./highlight.js";
import { decisionForKey, shortcutLegend } from "./keymap.js";
import { RetryQueue } from "./queue.js";

const FLUSH_INTERVAL_MS = 4000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export class ReviewApp {
  private current: ReviewInstance | null = null;
  private readonly retries = new RetryQueue<Decision>();
  private annotator = "";

  constructor(private readonly client: ApiClient) {}

  start(): void {
    el<HTMLFormElement>("annotator-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const name = el<HTMLInputElement>("annotator-name").value.trim();
      if (!name) return;
      this.annotator = name;
      el("login").hidden = true;
      el("workspace").hidden = false;
      void this.advance();
    });
    el("help-toggle").addEventListener("click", () => {
      const drawer = el("help-drawer");
      drawer.hidden = !drawer.hidden;
    });
    el("help-drawer").innerHTML = HELP_HTML;
    document.addEventListener("keydown", (event) => this.onKey(event));
    window.setInterval(() => void this.flushRetries(), FLUSH_INTERVAL_MS);
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.current || (event.target as HTMLElement).tagName === "INPUT") return;
    const hit = decisionForKey(
      event.key, this.current.labels, this.current.error_flag, this.current.auto_label,
    );
    if (hit) {
      event.preventDefault();
      void this.submit(hit.decision);
    }
  }

  private async advance(): Promise<void> {
    const queue = await this.client.nextInstance(this.annotator);
    el("progress-done").textContent = String(queue.done);
    el("progress-total").textContent = String(queue.total);
    el<HTMLProgressElement>("progress-bar").max = queue.total;
    el<HTMLProgressElement>("progress-bar").value = queue.done;
    await this.refreshKappa();
    if (!queue.instance) {
      this.current = null;
      el("card").hidden = true;
      el("done-banner").hidden = false;
      return;
    }
    this.current = queue.instance;
    this.renderCard(queue.instance);
  }

  private renderCard(instance: ReviewInstance): void {
    el("card").hidden = false;
    el("done-banner").hidden = true;
    const sentence = el("sentence");
    sentence.textContent = "";
    for (const segment of splitSegments(instance.text, instance.e1, instance.e2)) {
      const span = document.createElement("span");
      span.textContent = segment.text;
      if (segment.role !== "plain") span.className = `hl-${segment.role}`;
      sentence.appendChild(span);
    }
    el("auto-label").textContent = instance.auto_label;
    el("article-title").textContent =
      `${instance.article.title} (#${instance.article.wiki_id}, ${instance.strategy})`;

    const buttons = el("label-buttons");
    buttons.textContent = "";
    for (const [key, label] of shortcutLegend(instance.labels, instance.error_flag)) {
      if (key === "Enter") continue;
      const button = document.createElement("button");
      button.innerHTML = `<kbd>${key}</kbd> ${label}`;
      if (label === instance.auto_label) button.classList.add("auto");
      if (label === instance.error_flag) button.classList.add("flag");
      button.addEventListener("click", () => void this.submit(label));
      buttons.appendChild(button);
    }
  }

  private async submit(decision: string): Promise<void> {
    if (!this.current) return;
    const payload: Decision = {
      instance_id: this.current.instance_id,
      annotator: this.annotator,
      decision,
    };
    try {
      await this.client.submitDecision(payload);
      el("status").textContent = "";
    } catch (error) {
      // Server rejections are surfaced; network failures are queued and retried.
      if ((error as { status?: number }).status) {
        el("status").textContent = String(error);
        return;
      }
      this.retries.push(payload);
      el("status").textContent = `offline: ${this.retries.pending} decision(s) queued`;
    }
    await this.advance();
  }

  private async flushRetries(): Promise<void> {
    if (this.retries.pending === 0) return;
    const delivered = await this.retries.flush((d) => this.client.submitDecision(d).then(() => {}));
    if (delivered > 0) {
      el("status").textContent =
        this.retries.pending === 0 ? "" : `offline: ${this.retries.pending} decision(s) queued`;
    }
  }

  private async refreshKappa(): Promise<void> {
    try {
      const report = await this.client.kappa();
      el("kappa").textContent =
        report.kappa === null ? "n/a" : `${report.kappa.toFixed(3)} over ${report.n}`;
    } catch {
      el("kappa").textContent = "n/a";
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("workspace")) {
  new ReviewApp(new ApiClient("")).start();
}
