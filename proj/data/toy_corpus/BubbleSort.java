public static void bubbleSort(int[] data) {
    for (int i = 0; i < data.length; i++) {
        for (int j = 0; j + 1 < data.length - i; j++) {
            if (data[j] > data[j + 1]) {
                swap(data, j, j + 1);
            }
        }
    }
}
