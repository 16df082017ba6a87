public static void fill(char[] buffer, char symbol) {
    for (int i = 0; i < buffer.length; i++) {
        buffer[i] = symbol;
    }
}
