// Expects the wasm-bindgen output (`--target web`) in ./pkg.
import init, { Demo } from "./pkg/qseg_wasm_demo.js";

const $ = (id) => document.getElementById(id);
let demo;

function draw(id, rgba) {
  const canvas = $(id);
  canvas.width = demo.width();
  canvas.height = demo.height();
  const data = new ImageData(new Uint8ClampedArray(rgba), canvas.width, canvas.height);
  canvas.getContext("2d").putImageData(data, 0, 0);
}

function run(action) {
  try {
    action();
  } catch (e) {
    $("report").textContent = String(e);
  }
}

function generate() {
  run(() => {
    demo = new Demo(BigInt($("seed").value), Number($("touching").value));
    draw("image", demo.superpixels_rgba(Number($("superpixels").value)));
    draw("truth", demo.truth_rgba());
    draw("result", demo.boundary_rgba(0, 0, 0n));
    $("report").textContent = demo.last_report();
  });
}

function reconstructBoundary() {
  run(() => {
    draw("image", demo.image_rgba());
    draw("result", demo.boundary_rgba(Number($("blur").value), Number($("noise").value), BigInt($("seed").value)));
    $("report").textContent = demo.last_report();
  });
}

function reconstructSuperpixel() {
  run(() => {
    const count = Number($("superpixels").value);
    draw("image", demo.superpixels_rgba(count));
    draw("result", demo.superpixel_rgba(count, Number($("flip").value), BigInt($("seed").value)));
    $("report").textContent = demo.last_report();
  });
}

await init();
$("generate").addEventListener("click", generate);
$("run-boundary").addEventListener("click", reconstructBoundary);
$("run-superpixel").addEventListener("click", reconstructSuperpixel);
generate();
