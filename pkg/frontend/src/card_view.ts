/**
 * PatientCard panel.
 *
 * Top half is the glanceable card: score, tier chip, up to five factor
 * phrases, care plan. The expand control reveals the raw contribution
 * values and the model_meta provenance block; collapsing removes that
 * section again, restoring the initial DOM. A payload that fails
 * validation renders an error panel instead of crashing the view.
 */

import { cardProblems, formatScore, tierChip } from './tiers.js';
import type { CardViewModel, PatientCard } from './types.js';

export class CardView {
  model: CardViewModel | null = null;

  constructor(private mount: HTMLElement) {}

  render(payload: unknown): void {
    this.mount.textContent = '';
    const problems = cardProblems(payload);
    if (problems.length > 0) {
      this.renderError(problems);
      return;
    }
    const card = payload as PatientCard;
    this.model = { card, expanded: false, pendingOverrides: {} };

    const panel = document.createElement('section');
    panel.className = 'card-panel';

    const header = document.createElement('header');
    header.className = 'card-header';
    const title = document.createElement('h2');
    title.textContent = `Encounter ${card.encounter_id}`;
    const score = document.createElement('span');
    score.className = 'risk-score';
    score.textContent = formatScore(card.risk_score);
    header.append(title, score, tierChip(card.tier));
    panel.appendChild(header);

    const factors = document.createElement('ul');
    factors.className = 'factors';
    for (const factor of card.factors) {
      const item = document.createElement('li');
      item.className = 'factor-phrase';
      item.textContent = factor.phrase;
      factors.appendChild(item);
    }
    panel.appendChild(factors);

    const plan = document.createElement('ol');
    plan.className = 'care-plan';
    for (const line of card.care_plan) {
      const item = document.createElement('li');
      item.textContent = line;
      plan.appendChild(item);
    }
    panel.appendChild(plan);

    const expand = document.createElement('button');
    expand.className = 'expand-toggle';
    expand.textContent = 'Show details';
    expand.addEventListener('click', () => this.toggle(panel, expand));
    panel.appendChild(expand);

    this.mount.appendChild(panel);
  }

  private toggle(panel: HTMLElement, button: HTMLButtonElement): void {
    if (!this.model) return;
    if (this.model.expanded) {
      panel.querySelector('.card-details')?.remove();
      button.textContent = 'Show details';
      this.model.expanded = false;
      return;
    }
    panel.appendChild(this.details(this.model.card));
    button.textContent = 'Hide details';
    this.model.expanded = true;
  }

  private details(card: PatientCard): HTMLElement {
    const details = document.createElement('div');
    details.className = 'card-details';

    const contributions = document.createElement('table');
    contributions.className = 'contributions';
    for (const factor of card.factors) {
      const row = document.createElement('tr');
      const name = document.createElement('td');
      name.textContent = factor.feature;
      const value = document.createElement('td');
      value.className = 'contribution-value';
      value.textContent = factor.contribution.toFixed(6);
      row.append(name, value);
      contributions.appendChild(row);
    }
    details.appendChild(contributions);

    const meta = card.model_meta;
    const metaList = document.createElement('dl');
    metaList.className = 'model-meta';
    const entries: [string, string][] = [
      ['model', meta.model_fingerprint.slice(0, 16)],
      ['trained', meta.trained_at],
      ['test AUROC', formatScore(meta.test_auroc)],
      ['test AUPRC', formatScore(meta.test_auprc)],
      ['tiers', `${meta.thresholds.provenance}, high >= ` +
        `${formatScore(meta.thresholds.high_cut)}, medium >= ` +
        `${formatScore(meta.thresholds.medium_cut)}`],
    ];
    for (const [term, value] of entries) {
      const dt = document.createElement('dt');
      dt.textContent = term;
      const dd = document.createElement('dd');
      dd.textContent = value;
      metaList.append(dt, dd);
    }
    details.appendChild(metaList);
    return details;
  }

  private renderError(problems: string[]): void {
    this.model = null;
    const panel = document.createElement('div');
    panel.className = 'error-panel';
    const heading = document.createElement('p');
    heading.textContent = 'This card cannot be displayed:';
    panel.appendChild(heading);
    const list = document.createElement('ul');
    for (const problem of problems) {
      const item = document.createElement('li');
      item.textContent = problem;
      list.appendChild(item);
    }
    panel.appendChild(list);
    this.mount.appendChild(panel);
  }
}
