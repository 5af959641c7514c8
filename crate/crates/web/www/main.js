import init, { disk_family, sandwich_curves, sphere_points } from "./pkg/cylpack_web.js";

const $ = (id) => document.getElementById(id);

function showDisks() {
  const n = +$("d-n").value, r = +$("d-r").value, seed = BigInt($("d-seed").value || 0);
  $("d-n-v").textContent = n;
  $("d-r-v").textContent = r;
  const v = JSON.parse(disk_family(n, r, seed));
  if (v.error) { $("d-out").textContent = v.error; return; }
  $("disks").innerHTML = v.svg;
  const lines = [
    `separable        ${v.separable}`,
    `NS diameter      ${v.ns_diameter.toFixed(6)}`,
    `2 R_K            ${(2 * v.circumradius).toFixed(6)}`,
    `mass, 1/pi       ${v.mass_normalized.toFixed(6)}`,
    `mass, 1/(pi r)   ${v.mass_printed.toFixed(6)}`,
    `planks           ${v.planks}`,
  ];
  if (v.bound && !v.bound.error) {
    lines.push(`sum of widths    ${v.bound.widths.toFixed(6)} <= r diam_NS = ${v.bound.r_diam_ns.toFixed(6)}  (${v.bound.pass ? "holds" : "FAILS"})`);
  } else if (v.separable) {
    lines.push("the plank bound needs a non-separable family");
  }
  $("d-out").textContent = lines.join("\n");
}

function showSandwich() {
  const n = +$("s-n").value;
  $("s-n-v").textContent = n;
  const v = JSON.parse(sandwich_curves(n, 200));
  const c = $("s-plot"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (v.error) return;
  const rows = v.rows;
  const logs = rows.flatMap((r) => [Math.log10(r[1]), Math.log10(r[3])]);
  const lo = Math.min(...logs), hi = Math.max(...logs);
  const x = (d) => 40 + (c.width - 60) * d / (Math.PI / 2);
  const y = (p) => c.height - 20 - (c.height - 40) * (Math.log10(p) - lo) / (hi - lo);
  g.strokeStyle = "#ccc";
  g.strokeRect(40, 20, c.width - 60, c.height - 40);
  const curve = (i, color) => {
    g.strokeStyle = color;
    g.beginPath();
    rows.forEach((r, j) => (j ? g.lineTo(x(r[0]), y(r[i])) : g.moveTo(x(r[0]), y(r[i]))));
    g.stroke();
  };
  curve(1, "#999");
  curve(3, "#999");
  curve(2, "#000");
  g.fillStyle = "#555";
  g.fillText("δ", c.width - 15, c.height - 5);
  g.fillText("π/2", x(Math.PI / 2) - 10, c.height - 5);
}

function showSphere() {
  const d = +$("p-d").value, proj = $("p-proj").checked, seed = BigInt($("p-seed").value || 0);
  $("p-d-v").textContent = d.toFixed(2);
  const v = JSON.parse(sphere_points(d, proj, seed));
  const c = $("p-plot"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (v.error) { $("p-out").textContent = v.error; return; }
  const R = c.width / 2 - 10, cx = c.width / 2, cy = c.height / 2;
  g.strokeStyle = "#aaa";
  g.beginPath();
  g.arc(cx, cy, R, 0, 2 * Math.PI);
  g.stroke();
  const pts = proj ? v.points.flatMap((p) => [p, p.map((t) => -t)]) : v.points;
  for (const p of pts) {
    g.fillStyle = p[2] >= 0 ? "#c00" : "#f4b4b4";
    g.beginPath();
    g.arc(cx + R * p[0], cy - R * p[1], 3, 0, 2 * Math.PI);
    g.fill();
  }
  $("p-out").textContent = [
    `points           ${v.n}`,
    `counting bound   ${v.counting_bound.toFixed(3)}`,
    `min distance     ${v.min_distance.toFixed(6)}`,
    `maximal          ${v.maximal}`,
  ].join("\n");
}

await init();
for (const id of ["d-n", "d-r", "d-seed"]) $(id).addEventListener("input", showDisks);
$("s-n").addEventListener("input", showSandwich);
for (const id of ["p-d", "p-proj", "p-seed"]) $(id).addEventListener("input", showSphere);
showDisks();
showSandwich();
showSphere();
