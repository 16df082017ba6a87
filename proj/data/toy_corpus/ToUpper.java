public static String toUpper(String input) {
    if (input == null) {
        return null;
    }
    return input.toUpperCase();
}
