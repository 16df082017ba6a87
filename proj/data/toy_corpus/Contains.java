public static boolean contains(int[] items, int target) {
    for (int item : items) {
        if (item == target) {
            return true;
        }
    }
    return false;
}
