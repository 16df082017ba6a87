public static int countOccurrences(int[] values, int target) {
    int count = 0;
    for (int v : values) {
        if (v == target) {
            count++;
        }
    }
    return count;
}
