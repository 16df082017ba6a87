public static String reverse(String text) {
    StringBuilder builder = new StringBuilder();
    for (int i = text.length() - 1; i >= 0; i--) {
        builder.append(text.charAt(i));
    }
    return builder.toString();
}
