int SpawnReaderTask(Scheduler* sched, TaskFn fn, void* arg) {
    Coroutine* co = sched->Create(fn, arg, kDefaultStackSize);
    if (co == nullptr) {
        return -1;
    }
    sched->Resume(co);
    return co->id();
}

void YieldUntilReady(Coroutine* co, WaitQueue* queue) {
    queue->Push(co);
    co->set_state(kCoWaiting);
    co->Yield();
}
