public static int fibonacci(int n) {
    int previous = 0;
    int current = 1;
    for (int i = 0; i < n; i++) {
        int next = previous + current;
        previous = current;
        current = next;
    }
    return previous;
}
