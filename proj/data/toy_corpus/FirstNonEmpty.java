public static String firstNonEmpty(List<String> items) {
    for (String item : items) {
        if (item != null && !item.isEmpty()) {
            return item;
        }
    }
    return null;
}
