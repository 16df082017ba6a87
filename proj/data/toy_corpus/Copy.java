public static int[] copy(int[] source) {
    int[] target = new int[source.length];
    for (int i = 0; i < source.length; i++) {
        target[i] = source[i];
    }
    return target;
}
