public static int countLines(String text) {
    int lines = 1;
    for (int i = 0; i < text.length(); i++) {
        if (text.charAt(i) == '\n') {
            lines++;
        }
    }
    return lines;
}
