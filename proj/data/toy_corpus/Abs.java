public static int abs(int value) {
    if (value < 0) {
        return -value;
    }
    return value;
}
