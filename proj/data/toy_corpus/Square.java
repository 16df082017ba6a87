public static int[] square(int[] numbers) {
    int[] result = new int[numbers.length];
    for (int i = 0; i < numbers.length; i++) {
        result[i] = numbers[i] * numbers[i];
    }
    return result;
}
