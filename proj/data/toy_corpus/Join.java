public static String join(String[] parts, String separator) {
    StringBuilder sb = new StringBuilder();
    for (int i = 0; i < parts.length; i++) {
        if (i > 0) {
            sb.append(separator);
        }
        sb.append(parts[i]);
    }
    return sb.toString();
}
