public static String toBinary(int value) {
    if (value == 0) {
        return "0";
    }
    StringBuilder bits = new StringBuilder();
    while (value > 0) {
        bits.insert(0, value & 1);
        value >>= 1;
    }
    return bits.toString();
}
