public static int parseOrDefault(String text, int fallback) {
    try {
        return Integer.parseInt(text);
    } catch (NumberFormatException e) {
        return fallback;
    }
}
