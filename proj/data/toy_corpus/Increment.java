public synchronized void increment() {
    counter++;
    if (counter > limit) {
        counter = 0;
    }
}
