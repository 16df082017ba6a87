public static boolean isPrime(int number) {
    if (number < 2) {
        return false;
    }
    for (int d = 2; d * d <= number; d++) {
        if (number % d == 0) {
            return false;
        }
    }
    return true;
}
