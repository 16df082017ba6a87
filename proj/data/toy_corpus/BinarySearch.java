public static int binarySearch(int[] sorted, int key) {
    int low = 0;
    int high = sorted.length - 1;
    while (low <= high) {
        int mid = (low + high) >>> 1;
        if (sorted[mid] < key) {
            low = mid + 1;
        } else if (sorted[mid] > key) {
            high = mid - 1;
        } else {
            return mid;
        }
    }
    return -1;
}
