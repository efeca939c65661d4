import init, { predictRings, semianalyticMap, lineScan } from "./pkg/pairspec_browser.js";

const $ = (id) => document.getElementById(id);
const num = (form, name) => Number(form.elements[name].value);

function guarded(fn) {
  return (event) => {
    event.preventDefault();
    $("error").textContent = "";
    try {
      fn(event.target);
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

function showPrediction(form) {
  const p = JSON.parse(predictRings(num(form, "e0"), num(form, "omega"), num(form, "nmin"), num(form, "nmax")));
  $("predict-summary").textContent =
    `gamma = ${p.gamma.toFixed(4)}, m* = ${p.mstar.toFixed(5)}, lowest open channel n = ${p.min_photon_number}`;
  const body = $("predict-table").querySelector("tbody");
  body.replaceChildren(...p.rings.map((r) => {
    const tr = document.createElement("tr");
    const cells = [r.n, r.present ? "yes" : "no", r.radius === null ? "-" : r.radius.toFixed(5), r.node_count,
      r.node_qx.map((x) => x.toFixed(3)).join(", ")];
    for (const c of cells) {
      const td = document.createElement("td");
      td.textContent = c;
      tr.append(td);
    }
    return tr;
  }));
}

// black -> blue -> yellow -> white
function color(t) {
  const stops = [[0, 0, 0], [30, 40, 160], [230, 200, 40], [255, 255, 255]];
  const x = Math.min(Math.max(t, 0), 1) * (stops.length - 1);
  const i = Math.min(Math.floor(x), stops.length - 2);
  const f = x - i;
  return stops[i].map((a, k) => Math.round(a + f * (stops[i + 1][k] - a)));
}

function drawMap(form) {
  const side = num(form, "side");
  const values = semianalyticMap(num(form, "e0"), num(form, "omega"), num(form, "nmax"), num(form, "hw"), side,
    form.elements.bracketed.checked);
  const canvas = $("map");
  canvas.width = side;
  canvas.height = side;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(side, side);
  const max = values.reduce((a, b) => Math.max(a, b), 0);
  const floor = max * 1e-6;
  values.forEach((v, k) => {
    const t = max > 0 && v > floor ? Math.log10(v / floor) / 6 : 0;
    const [r, g, b] = color(t);
    img.data.set([r, g, b, 255], 4 * k);
  });
  ctx.putImageData(img, 0, 0);
}

function drawScan(form) {
  const [lo, hi, n] = [num(form, "lo"), num(form, "hi"), num(form, "n")];
  const start = performance.now();
  const f = lineScan(num(form, "e0"), num(form, "omega"), num(form, "delta"), num(form, "tau"), num(form, "qy"), lo, hi, n);
  const elapsed = (performance.now() - start) / 1000;
  const canvas = $("scan");
  const ctx = canvas.getContext("2d");
  const [w, h, pad] = [canvas.width, canvas.height, 30];
  ctx.clearRect(0, 0, w, h);
  const max = f.reduce((a, b) => Math.max(a, b), 0) || 1;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 10, w - pad - 10, h - pad - 10);
  ctx.fillStyle = "#444";
  ctx.fillText(lo.toFixed(2), pad, h - 10);
  ctx.fillText(hi.toFixed(2), w - 40, h - 10);
  ctx.fillText(max.toExponential(2), 2, 20);
  ctx.strokeStyle = "#1a4fb4";
  ctx.beginPath();
  f.forEach((v, k) => {
    const x = pad + (w - pad - 10) * k / (n - 1);
    const y = h - pad - (h - pad - 10) * v / max;
    if (k === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
  });
  ctx.stroke();
  $("scan-status").textContent = `${n} points in ${elapsed.toFixed(1)} s; peak f = ${max.toExponential(3)}`;
}

await init();
$("predict-form").addEventListener("submit", guarded(showPrediction));
$("map-form").addEventListener("submit", guarded(drawMap));
$("scan-form").addEventListener("submit", guarded(drawScan));
$("predict-form").requestSubmit();
