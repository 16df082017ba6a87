public static double min(double a, double b) {
    if (a < b) {
        return a;
    }
    return b;
}
