/**
 * Entry point: wires list, card, and what-if views together.
 *
 * Served by the primary service at /ui. Append ?mode=fixture to run on
 * the recorded payloads instead of the live endpoints (handy when
 * developing the UI with no model trained yet).
 */

import { FixtureClient, HttpClient, type ServiceClient } from './api.js';
import { CardView } from './card_view.js';
import { PatientListView } from './list_view.js';
import { isValidCard } from './tiers.js';
import { WhatIfPanel } from './whatif_panel.js';

function pickClient(): ServiceClient {
  const params = new URLSearchParams(window.location.search);
  if (params.get('mode') === 'fixture') return new FixtureClient();
  // the UI is mounted at /ui, the API at the origin root
  return new HttpClient('');
}

export function boot(root: HTMLElement): void {
  const listMount = document.createElement('div');
  listMount.id = 'list';
  const cardMount = document.createElement('div');
  cardMount.id = 'card';
  const whatifMount = document.createElement('div');
  whatifMount.id = 'whatif';
  root.append(listMount, cardMount, whatifMount);

  const client = pickClient();
  const cardView = new CardView(cardMount);

  const listView = new PatientListView(client, listMount, {
    pageSize: 50,
    onSelect: (encounterId) => {
      void client.getCard(encounterId).then((payload) => {
        cardView.render(payload);
        whatifMount.textContent = '';
        if (isValidCard(payload)) {
          new WhatIfPanel(payload, client, whatifMount).render();
        }
      });
    },
  });
  void listView.render();
}

const root = document.getElementById('app');
if (root) boot(root);
