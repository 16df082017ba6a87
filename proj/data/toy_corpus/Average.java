public static double average(double[] samples) {
    double sum = 0.0;
    for (double s : samples) {
        sum += s;
    }
    return sum / samples.length;
}
