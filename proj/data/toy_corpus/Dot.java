public static double dot(double[] a, double[] b) {
    double result = 0;
    for (int i = 0; i < a.length; i++) {
        result += a[i] * b[i];
    }
    return result;
}
