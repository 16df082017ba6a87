public static int countWords(String line) {
    String trimmed = line.trim();
    if (trimmed.isEmpty()) {
        return 0;
    }
    return trimmed.split("\\s+").length;
}
