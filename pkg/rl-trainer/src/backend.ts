import * as tf from '@tensorflow/tfjs';
import '@tensorflow/tfjs-backend-wasm';

let initialized = false;

/** Prefer the wasm backend (an order of magnitude faster than the plain JS
 * kernels in Node); fall back to cpu if it cannot load. */
export async function initBackend(): Promise<string> {
  if (!initialized) {
    try {
      await tf.setBackend('wasm');
    } catch {
      await tf.setBackend('cpu');
    }
    await tf.ready();
    initialized = true;
  }
  return tf.getBackend();
}
