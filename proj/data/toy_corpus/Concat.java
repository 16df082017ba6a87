public static String concat(String first, String second) {
    if (first == null) {
        return second;
    }
    if (second == null) {
        return first;
    }
    return first + second;
}
