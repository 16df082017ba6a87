public static int countPositive(List<Integer> values) {
    int count = 0;
    for (Integer value : values) {
        if (value > 0) {
            count++;
        }
    }
    return count;
}
