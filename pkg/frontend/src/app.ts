/** Single-page clinician console. Renders into #app and talks only to the
 * session HTTP API; all displayed figures come from API documents. */

import { ApiClient, ApiError, type SubmitMetadata } from "./api.js";
import type { ResultDocument } from "./types.js";
import {
  buildViewModel,
  validateReviewInput,
  type HeatmapCell,
  type PlanTreeNode,
  type ViewModel,
} from "./viewmodel.js";

const DURATIONS = [3, 4, 5];
const OVERLAPS = [0, 25, 50, 75];
const POLL_INTERVAL_MS = 1000;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function section(title: string, ...children: (Node | string)[]): HTMLElement {
  const details = el("details", { open: "" });
  details.append(el("summary", {}, title), ...children);
  return details;
}

export class ConsoleApp {
  private banner: HTMLElement;
  private main: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient = new ApiClient(),
  ) {
    this.banner = el("div", { class: "banner", hidden: "" });
    this.main = el("main");
    root.replaceChildren(this.banner, this.main);
    this.showIntake();
  }

  private showBanner(message: string, retry?: () => void): void {
    this.banner.replaceChildren(message);
    if (retry) {
      const button = el("button", {}, "Retry");
      button.onclick = () => {
        this.banner.hidden = true;
        retry();
      };
      this.banner.append(" ", button);
    }
    this.banner.hidden = false;
  }

  // -- intake ---------------------------------------------------------------

  private showIntake(): void {
    const demographics = el("input", {
      placeholder: "Demographics (e.g. adult, 34)", required: "",
    });
    const history = el("textarea", { placeholder: "Clinical history" });
    const file = el("input", { type: "file", accept: ".wav,audio/wav" });
    const duration = el("select");
    for (const d of DURATIONS) {
      duration.append(el("option", { value: String(d) }, `${d}s windows`));
    }
    duration.value = "4";
    const overlap = el("select");
    for (const k of OVERLAPS) {
      overlap.append(el("option", { value: String(k) }, `${k}% overlap`));
    }
    overlap.value = "50";
    const mode = el("select");
    mode.append(
      el("option", { value: "full" }, "Full (analysis + therapy plan)"),
      el("option", { value: "classification_only" }, "Classification only"),
    );

    const submit = el("button", {}, "Submit session");
    submit.onclick = async () => {
      const audio = file.files?.[0];
      if (!audio) {
        this.showBanner("Select or record a WAV file first.");
        return;
      }
      if (!demographics.value.trim()) {
        this.showBanner("Demographics are required.");
        return;
      }
      const metadata: SubmitMetadata = {
        mode: mode.value as SubmitMetadata["mode"],
        patient: {
          demographics: demographics.value,
          clinical_history: history.value,
        },
        seg_config: {
          duration_s: Number(duration.value),
          overlap_pct: Number(overlap.value),
        },
      };
      submit.disabled = true;
      try {
        const sessionId = await this.api.createSession(metadata, audio, audio.name);
        await this.showProgress(sessionId);
      } catch (error) {
        // keep the form state so nothing typed is lost
        const message =
          error instanceof ApiError
            ? error.detail
            : "Server unreachable; your form is preserved.";
        this.showBanner(message, () => submit.click());
      } finally {
        submit.disabled = false;
      }
    };

    this.main.replaceChildren(
      el("h1", {}, "New session"),
      demographics, history, file, duration, overlap, mode, submit,
    );
  }

  // -- progress -------------------------------------------------------------

  private async showProgress(sessionId: string): Promise<void> {
    const stageLabel = el("p", {}, "Queued");
    const bar = el("progress", { max: "1", value: "0" });
    this.main.replaceChildren(
      el("h1", {}, `Session ${sessionId}`), stageLabel, bar,
    );
    for (;;) {
      const status = await this.api.getStatus(sessionId);
      stageLabel.replaceChildren(
        `${status.lifecycle}${status.stage ? ` — ${status.stage}` : ""}`,
      );
      bar.value = status.progress;
      if (!["Queued", "Processing", "Revising"].includes(status.lifecycle)) {
        if (status.lifecycle === "Failed") {
          this.showBanner(`Processing failed: ${status.reason ?? "unknown"}`);
          return;
        }
        await this.showResults(sessionId);
        return;
      }
      await new Promise((resolve) => setTimeout(resolve, POLL_INTERVAL_MS));
    }
  }

  // -- results --------------------------------------------------------------

  private async showResults(sessionId: string): Promise<void> {
    const doc = await this.api.getResults(sessionId);
    const vm = buildViewModel(doc);
    this.main.replaceChildren(
      el("h1", {}, `Session ${sessionId} — ${vm.lifecycle}`),
      this.renderSummary(vm),
      section("Stuttering type distribution", this.renderDonut(vm)),
      section("Chunk heatmap", this.renderHeatmap(vm)),
      ...(vm.planTree ? [section("Therapy plan", this.renderTree(vm.planTree))] : []),
      section("Generation history", this.renderHistory(vm)),
      section("Audit log", this.renderAudit(vm)),
      this.renderReviewPanel(doc, vm),
    );
  }

  private renderSummary(vm: ViewModel): HTMLElement {
    const rows: [string, string][] = [
      ["Mode", vm.summary.mode],
      ["Duration", `${vm.summary.durationS.toFixed(1)}s`],
      ["Chunks", String(vm.summary.chunkCount)],
      ["Primary type", vm.summary.primaryType],
      ["Secondary type", vm.summary.secondaryType ?? "—"],
      ["Stuttering", `${vm.summary.stutteringPct.toFixed(1)}%`],
      ["Severity", vm.summary.severity],
      ["Confidence", `${(vm.summary.weightedConfidence * 100).toFixed(1)}%`],
      ["Problematic phonemes",
        vm.summary.problematicPhonemes
          .map(([p, r]) => `/${p}/ (${r.toFixed(2)})`)
          .join(", ") || "—"],
    ];
    const table = el("table");
    for (const [key, value] of rows) {
      table.append(el("tr", {}, el("th", {}, key), el("td", {}, value)));
    }
    const flags = el("p", {});
    if (vm.summary.redFlag) flags.append(el("strong", {}, "URGENT: review required. "));
    if (vm.summary.degraded) flags.append("Plan refinement degraded. ");
    for (const warning of vm.summary.warnings) flags.append(`${warning} `);
    return el("div", {}, table, flags);
  }

  private renderDonut(vm: ViewModel): HTMLElement {
    // Conic-gradient donut; fractions come straight from the document.
    let acc = 0;
    const stops = vm.donut.map((segment) => {
      const from = acc;
      acc += segment.fraction;
      return `${segment.color} ${(from * 100).toFixed(2)}% ${(acc * 100).toFixed(2)}%`;
    });
    const disk = el("div", {
      class: "donut",
      style: `background: conic-gradient(${stops.join(", ")});`,
    });
    const legend = el("ul");
    for (const segment of vm.donut) {
      legend.append(el(
        "li", { style: `color: ${segment.color}` },
        `${segment.label}: ${(segment.fraction * 100).toFixed(1)}% (${segment.count})`,
      ));
    }
    return el("div", {}, disk, legend);
  }

  private renderHeatmap(vm: ViewModel): HTMLElement {
    const row = el("div", { class: "heatmap" });
    for (const cell of vm.cells) {
      row.append(this.renderCell(cell));
    }
    return row;
  }

  private renderCell(cell: HeatmapCell): HTMLElement {
    const node = el("button", {
      class: "cell",
      style: `background: ${cell.color}; opacity: ${cell.opacity};`,
      title: cell.tooltip.join("\n"),
    }, String(cell.index));
    node.onclick = () => {
      void new Audio(cell.audioPath).play();
    };
    return node;
  }

  private renderTree(node: PlanTreeNode): HTMLElement {
    const item = el("li", {}, el("strong", {}, node.label));
    if (node.detail) item.append(` — ${node.detail}`);
    if (node.children.length > 0) {
      const list = el("ul");
      for (const child of node.children) list.append(this.renderTree(child));
      item.append(list);
    }
    return el("ul", {}, item);
  }

  private renderHistory(vm: ViewModel): HTMLElement {
    const list = el("ol");
    for (const record of vm.generationHistory) {
      list.append(el(
        "li", {},
        `round ${record.round} — ${record.role}${record.parsed_ok ? "" : " (unparsed)"}`,
      ));
    }
    return list;
  }

  private renderAudit(vm: ViewModel): HTMLElement {
    const table = el("table");
    table.append(el(
      "tr", {},
      el("th", {}, "When"), el("th", {}, "Clinician"),
      el("th", {}, "Action"), el("th", {}, "Feedback"), el("th", {}, "State"),
    ));
    for (const entry of vm.auditList) {
      table.append(el(
        "tr", {},
        el("td", {}, entry.timestamp),
        el("td", {}, entry.clinician_id),
        el("td", {}, entry.action),
        el("td", {}, entry.feedback ?? ""),
        el("td", {}, entry.resulting_state),
      ));
    }
    return table;
  }

  // -- review ---------------------------------------------------------------

  private renderReviewPanel(doc: ResultDocument, vm: ViewModel): HTMLElement {
    if (vm.lifecycle !== "PendingReview") {
      const panel = el("div", {}, `Review closed (${vm.lifecycle}).`);
      if (vm.lifecycle === "Approved" || vm.lifecycle === "Rejected") {
        panel.append(" ", el(
          "a", { href: this.api.exportUrl(doc.sessionId) }, "Export report",
        ));
      }
      return panel;
    }

    const clinician = el("input", { placeholder: "Clinician ID", required: "" });
    const feedback = el("textarea", {
      placeholder: "Feedback (required for Modify)",
    });
    const panel = el("div", { class: "review" }, clinician, feedback);

    const act = async (action: "approve" | "reject" | "modify") => {
      const problem = validateReviewInput(action, feedback.value);
      if (problem) {
        this.showBanner(problem);
        return;
      }
      if (
        (action === "approve" || action === "reject")
        && !window.confirm(`Really ${action} this plan?`)
      ) {
        return;
      }
      try {
        await this.api.postReview(doc.sessionId, {
          action,
          clinicianId: clinician.value || "unknown",
          ...(action === "modify" ? { feedback: feedback.value } : {}),
        });
        await this.showProgress(doc.sessionId);
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          // stale state (e.g. modification limit reached): explain and refresh
          this.showBanner(error.detail);
          await this.showResults(doc.sessionId);
        } else {
          throw error;
        }
      }
    };

    for (const action of ["approve", "reject", "modify"] as const) {
      const button = el("button", {}, action);
      button.onclick = () => void act(action);
      panel.append(button);
    }
    return panel;
  }
}

export function mount(selector = "#app"): ConsoleApp {
  const root = document.querySelector<HTMLElement>(selector);
  if (!root) throw new Error(`mount point ${selector} not found`);
  return new ConsoleApp(root);
}
