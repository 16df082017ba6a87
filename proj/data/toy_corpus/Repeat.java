public static String repeat(String piece, int times) {
    StringBuilder out = new StringBuilder();
    for (int i = 0; i < times; i++) {
        out.append(piece);
    }
    return out.toString();
}
