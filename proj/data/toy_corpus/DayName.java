public static String dayName(int day) {
    switch (day) {
        case 1:
            return "Monday";
        case 2:
            return "Tuesday";
        default:
            return "Other";
    }
}
