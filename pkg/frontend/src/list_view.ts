/**
 * Ranked patient list.
 *
 * Rows show encounter id, risk score, and a tier chip; clicking a row
 * hands the encounter id to the caller (who opens the card view). A
 * failed fetch swaps the table for an offline banner with a retry
 * control, and an empty listing gets an explicit empty state.
 */

import type { ServiceClient, SortKey } from './api.js';
import { formatScore, tierChip } from './tiers.js';

export interface ListViewOptions {
  pageSize?: number;
  onSelect?: (encounterId: number) => void;
}

export class PatientListView {
  sort: SortKey = 'score';

  constructor(
    private client: ServiceClient,
    private mount: HTMLElement,
    private options: ListViewOptions = {},
  ) {}

  async render(): Promise<void> {
    this.mount.textContent = '';
    try {
      const listing = await this.client.listPatients(
        1,
        this.options.pageSize ?? 20,
        this.sort,
      );
      if (listing.items.length === 0) {
        this.renderEmpty();
        return;
      }
      this.renderTable(listing.items);
    } catch {
      this.renderOffline();
    }
  }

  /** Flip between score-ranked and id order, then re-fetch. */
  async toggleSort(): Promise<void> {
    this.sort = this.sort === 'score' ? 'id' : 'score';
    await this.render();
  }

  private renderTable(items: Awaited<ReturnType<ServiceClient['listPatients']>>['items']): void {
    const toolbar = document.createElement('div');
    toolbar.className = 'list-toolbar';
    const sortButton = document.createElement('button');
    sortButton.className = 'sort-toggle';
    sortButton.textContent =
      this.sort === 'score' ? 'sorted by risk' : 'sorted by id';
    sortButton.addEventListener('click', () => void this.toggleSort());
    toolbar.appendChild(sortButton);
    this.mount.appendChild(toolbar);

    const table = document.createElement('table');
    table.className = 'patient-list';
    const head = document.createElement('tr');
    for (const label of ['encounter', 'risk', 'tier']) {
      const th = document.createElement('th');
      th.textContent = label;
      head.appendChild(th);
    }
    table.appendChild(head);

    for (const item of items) {
      const row = document.createElement('tr');
      row.className = 'patient-row';
      row.dataset.encounterId = String(item.encounter_id);

      const idCell = document.createElement('td');
      idCell.textContent = String(item.encounter_id);
      const scoreCell = document.createElement('td');
      scoreCell.textContent = formatScore(item.risk_score);
      const tierCell = document.createElement('td');
      tierCell.appendChild(tierChip({ tier: item.tier, color: item.color }));

      row.append(idCell, scoreCell, tierCell);
      row.addEventListener('click', () =>
        this.options.onSelect?.(item.encounter_id),
      );
      table.appendChild(row);
    }
    this.mount.appendChild(table);
  }

  private renderEmpty(): void {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent = 'No patient cards exported yet.';
    this.mount.appendChild(empty);
  }

  private renderOffline(): void {
    const banner = document.createElement('div');
    banner.className = 'offline-banner';
    const message = document.createElement('span');
    message.textContent = 'Card service unreachable.';
    const retry = document.createElement('button');
    retry.className = 'retry';
    retry.textContent = 'Retry';
    retry.addEventListener('click', () => void this.render());
    banner.append(message, retry);
    this.mount.appendChild(banner);
  }
}
