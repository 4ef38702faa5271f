// Strict FIFO for server posts: a task starts only after the previous one
// settled, so keyboard edits reach the service in press order and each
// response is applied before the next request leaves.
export class SerialQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private depth = 0;

  get pending(): number {
    return this.depth;
  }

  run<T>(task: () => Promise<T>): Promise<T> {
    this.depth += 1;
    // the decrement rides on the returned chain so a caller that awaited
    // the task always sees the settled count
    const result = this.tail.then(task).finally(() => {
      this.depth -= 1;
    });
    // a rejected task must not poison the chain for later tasks
    this.tail = result.catch(() => undefined);
    return result;
  }
}
