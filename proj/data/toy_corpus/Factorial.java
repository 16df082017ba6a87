public static long factorial(int n) {
    long result = 1;
    while (n > 1) {
        result *= n;
        n--;
    }
    return result;
}
