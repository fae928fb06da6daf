/** Spawn the real python session service for end-to-end tests. */

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export interface LiveService {
  base: string;
  stop: () => void;
}

export async function startService(): Promise<LiveService> {
  const port = 21000 + Math.floor(Math.random() * 3000);
  const stateDir = mkdtempSync(join(tmpdir(), 'pmesii-console-'));
  const child: ChildProcess = spawn(
    'python3',
    ['-m', 'pmesii.harness.cli', 'serve', '--state-dir', stateDir, '--port', String(port)],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  let stderr = '';
  child.stderr?.on('data', (chunk) => {
    stderr += String(chunk);
  });
  const base = `http://127.0.0.1:${port}`;

  const deadline = Date.now() + 30000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (code ${child.exitCode}): ${stderr}`);
    }
    try {
      const resp = await fetch(`${base}/sessions/none/state`);
      if (resp.status === 404) break; // responding: unknown session is expected
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service did not come up on ${base}: ${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  return {
    base,
    stop: () => {
      child.kill('SIGTERM');
    },
  };
}
