public static double lerp(double start, double end, double t) {
    final double span = end - start;
    return start + span * t;
}
