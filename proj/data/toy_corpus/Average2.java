public static double mean(int[] scores) {
    if (scores.length == 0) {
        return 0;
    }
    long total = 0;
    for (int score : scores) {
        total += score;
    }
    return (double) total / scores.length;
}
