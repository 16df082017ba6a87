public static String capitalize(String word) {
    if (word == null || word.isEmpty()) {
        return word;
    }
    char head = Character.toUpperCase(word.charAt(0));
    return head + word.substring(1);
}
