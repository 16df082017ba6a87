public static String readFirstLine(BufferedReader reader) throws IOException {
    String line = reader.readLine();
    if (line == null) {
        return "";
    }
    return line;
}
